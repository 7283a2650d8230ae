// Copyright 2026 The cycleaug Authors
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

// Everything in one include.
#pragma once

#include "cycleaug/adam.hpp"
#include "cycleaug/augment.hpp"
#include "cycleaug/autodiff.hpp"
#include "cycleaug/checkpoint.hpp"
#include "cycleaug/classifier.hpp"
#include "cycleaug/config.hpp"
#include "cycleaug/cyclegan.hpp"
#include "cycleaug/dataset.hpp"
#include "cycleaug/experiment.hpp"
#include "cycleaug/image.hpp"
#include "cycleaug/kernels.hpp"
#include "cycleaug/losses.hpp"
#include "cycleaug/metrics.hpp"
#include "cycleaug/nn.hpp"
#include "cycleaug/ops.hpp"
#include "cycleaug/pipeline.hpp"
#include "cycleaug/random.hpp"
#include "cycleaug/segmentation.hpp"
#include "cycleaug/tensor.hpp"
