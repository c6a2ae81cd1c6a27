/*
 * synthstroke
 *
 * Copyright 2026 The synthstroke Authors
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
#pragma once

#include "synthstroke/augment.hpp"
#include "synthstroke/config.hpp"
#include "synthstroke/error.hpp"
#include "synthstroke/fields.hpp"
#include "synthstroke/filters.hpp"
#include "synthstroke/geometry.hpp"
#include "synthstroke/lesion.hpp"
#include "synthstroke/manifest.hpp"
#include "synthstroke/metrics.hpp"
#include "synthstroke/morphology.hpp"
#include "synthstroke/nifti.hpp"
#include "synthstroke/parallel.hpp"
#include "synthstroke/postproc.hpp"
#include "synthstroke/resample.hpp"
#include "synthstroke/rng.hpp"
#include "synthstroke/stack_io.hpp"
#include "synthstroke/summary.hpp"
#include "synthstroke/synth.hpp"
#include "synthstroke/volume.hpp"
