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

#include "loratwin/server_config.hpp"

#include "loratwin/errors.hpp"

namespace loratwin {

void ServerConfig::validate() const {
  if (slots < 1) throw ValidationError("config.slots: must be >= 1, got " + std::to_string(slots));
  if (iteration_cap < 1) throw ValidationError("config.iteration_cap: must be >= 1");
  latency.validate();
  memory.validate();
  load.validate();
}

ServerConfig h100_like_config(int slots) {
  ServerConfig config;
  config.slots = slots;

  config.latency.k1 = 1e-5;
  config.latency.k2 = 2e-6;
  config.latency.k3 = 2e-5;
  config.latency.k4 = 3.5e-4;
  config.latency.k5 = 0.022;
  config.latency.k6 = 0.015;
  config.latency.k7 = 1.15;

  config.memory.total_kv_budget = 320'000;
  config.memory.kv_bytes_per_token = 160.0 * 1024.0;
  config.memory.slot_cost_base_rank8 = 800.0;

  config.load.cpu_load_seconds = {{8, 0.04}, {16, 0.07}, {32, 0.12}, {64, 0.22}, {128, 0.40}};
  config.load.disk_multiplier = 1.7;
  config.load.default_source = LoadSource::Cpu;

  return config;
}

}  // namespace loratwin
