/* Copyright 2026 The loratwin Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "loratwin/adapter_cache.hpp"

#include <algorithm>

#include "loratwin/errors.hpp"

namespace loratwin {

SlotCache::SlotCache(int capacity_slots) : capacity_slots_(capacity_slots) {
  if (capacity_slots < 1)
    throw ValidationError("SlotCache: capacity must be >= 1, got " +
                          std::to_string(capacity_slots));
}

bool SlotCache::is_loadable(int adapter_id, const std::unordered_set<int>& busy_adapters) const {
  if (resident_.count(adapter_id)) return true;
  if (resident_count() < capacity_slots_) return true;
  for (const auto& [id, entry] : resident_) {
    (void)entry;
    if (!busy_adapters.count(id)) return true;
  }
  return false;
}

std::vector<LoadEvent> SlotCache::ensure_loaded(const std::map<int, int>& needed, double now,
                                                const LoadLatencyTable& table,
                                                LoadSource source) {
  if (static_cast<int>(needed.size()) > capacity_slots_)
    throw InternalError("SlotCache: running batch needs " + std::to_string(needed.size()) +
                        " adapters but only " + std::to_string(capacity_slots_) +
                        " slots exist (admission bug)");

  std::vector<LoadEvent> events;
  for (const auto& [adapter_id, rank] : needed) {
    if (resident_.count(adapter_id)) continue;
    if (resident_count() >= capacity_slots_) {
      // Evict the LRU resident that is not needed by the running batch;
      // ties broken by adapter id for determinism.
      int victim = -1;
      double victim_used = 0.0;
      for (const auto& [id, entry] : resident_) {
        if (needed.count(id)) continue;
        if (victim < 0 || entry.last_used_s < victim_used ||
            (entry.last_used_s == victim_used && id < victim)) {
          victim = id;
          victim_used = entry.last_used_s;
        }
      }
      if (victim < 0)
        throw InternalError("SlotCache: no evictable slot for adapter " +
                            std::to_string(adapter_id) + " (admission bug)");
      resident_.erase(victim);
    }
    resident_.emplace(adapter_id, Entry{rank, now});
    events.push_back(LoadEvent{now, adapter_id, rank, source,
                               table.load_latency(rank, source)});
  }
  for (const auto& [adapter_id, rank] : needed) {
    (void)rank;
    resident_.at(adapter_id).last_used_s = now;
  }
  return events;
}

std::vector<std::pair<int, double>> SlotCache::residents() const {
  std::vector<std::pair<int, double>> out;
  out.reserve(resident_.size());
  for (const auto& [id, entry] : resident_) out.emplace_back(id, entry.last_used_s);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace loratwin
