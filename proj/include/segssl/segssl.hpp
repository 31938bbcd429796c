// Copyright 2026 The segssl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "segssl/grid.hpp"
#include "segssl/io.hpp"
#include "segssl/local_stats.hpp"
#include "segssl/loss_report.hpp"
#include "segssl/metrics.hpp"
#include "segssl/ssim.hpp"
#include "segssl/ssl.hpp"
#include "segssl/harness/ablation.hpp"
#include "segssl/harness/checkpoint.hpp"
#include "segssl/harness/dataset.hpp"
#include "segssl/harness/model.hpp"
#include "segssl/harness/schedule.hpp"
#include "segssl/harness/train.hpp"
