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

#pragma once

#include <map>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "loratwin/estimators.hpp"

namespace loratwin {

// One adapter fetched into a GPU slot, as it appears in the trace.
struct LoadEvent {
  double time_s = 0.0;
  int adapter_id = 0;
  int rank = 0;
  LoadSource source = LoadSource::Cpu;
  double latency_s = 0.0;
};

// The G adapter slots, with LRU replacement over idle residents.
class SlotCache {
 public:
  explicit SlotCache(int capacity_slots);

  int capacity() const { return capacity_slots_; }
  int resident_count() const { return static_cast<int>(resident_.size()); }
  bool is_resident(int adapter_id) const { return resident_.count(adapter_id) != 0; }

  // True iff `adapter_id` could be given a slot right now: it is resident,
  // a slot is free, or some resident adapter outside `busy_adapters` can be
  // evicted.
  bool is_loadable(int adapter_id, const std::unordered_set<int>& busy_adapters) const;

  // Brings every adapter in `needed` (adapter_id -> rank, the running
  // batch's adapters) into a slot, evicting least-recently-used idle
  // residents as required, and refreshes last_used of all needed adapters.
  // Returns one priced load event per miss. Needing more adapters than
  // slots is an admission bug and raises InternalError.
  std::vector<LoadEvent> ensure_loaded(const std::map<int, int>& needed, double now,
                                       const LoadLatencyTable& table, LoadSource source);

  // Residents with their last-used stamps, for tests and trace dumps.
  std::vector<std::pair<int, double>> residents() const;

 private:
  struct Entry {
    int rank;
    double last_used_s;
  };

  int capacity_slots_;
  std::unordered_map<int, Entry> resident_;
};

}  // namespace loratwin
