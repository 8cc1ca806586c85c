/*
 * Copyright (c) 2026, The s4cd Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Umbrella header for the library (the CLI lives in s4cd/cli.hpp).

#pragma once

#include "s4cd/core.hpp"
#include "s4cd/dataio.hpp"
#include "s4cd/fft.hpp"
#include "s4cd/kernelgen.hpp"
#include "s4cd/metrics.hpp"
#include "s4cd/model.hpp"
#include "s4cd/parallel.hpp"
#include "s4cd/perf.hpp"
#include "s4cd/pipeline.hpp"
#include "s4cd/random.hpp"
#include "s4cd/seqconv.hpp"
#include "s4cd/training.hpp"
