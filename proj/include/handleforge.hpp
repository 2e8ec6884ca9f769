// Copyright 2026 The HandleForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Umbrella header for the whole library. The HTTP server lives in
// handleforge/service/server.hpp and is not included here.

#include "handleforge/apps/latent.hpp"
#include "handleforge/data/adaptive.hpp"
#include "handleforge/data/fit.hpp"
#include "handleforge/data/io.hpp"
#include "handleforge/data/normalize.hpp"
#include "handleforge/data/sampling.hpp"
#include "handleforge/data/synthetic.hpp"
#include "handleforge/diff/adam.hpp"
#include "handleforge/diff/grad_check.hpp"
#include "handleforge/diff/ops.hpp"
#include "handleforge/diff/tape.hpp"
#include "handleforge/eval/ablation.hpp"
#include "handleforge/eval/voxel.hpp"
#include "handleforge/geometry.hpp"
#include "handleforge/metrics.hpp"
#include "handleforge/net/checkpoint.hpp"
#include "handleforge/net/codec.hpp"
#include "handleforge/net/config.hpp"
#include "handleforge/net/losses.hpp"
#include "handleforge/net/model.hpp"
#include "handleforge/net/train.hpp"
#include "handleforge/service/api.hpp"
