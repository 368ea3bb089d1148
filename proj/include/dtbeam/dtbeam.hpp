// Copyright (C) 2026 The dtbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "dtbeam/adaptation.hpp"
#include "dtbeam/angular_profile.hpp"
#include "dtbeam/channel_sim.hpp"
#include "dtbeam/codebook.hpp"
#include "dtbeam/dataset.hpp"
#include "dtbeam/error.hpp"
#include "dtbeam/evaluation.hpp"
#include "dtbeam/grid.hpp"
#include "dtbeam/io.hpp"
#include "dtbeam/metrics.hpp"
#include "dtbeam/scene.hpp"
#include "dtbeam/synth.hpp"
