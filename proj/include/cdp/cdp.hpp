// Copyright 2026 The cdpbench Authors
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

// Umbrella header for the whole library.

#include "cdp/attack.hpp"        // IWYU pragma: export
#include "cdp/authenticator.hpp" // IWYU pragma: export
#include "cdp/channel.hpp"       // IWYU pragma: export
#include "cdp/checkpoint.hpp"    // IWYU pragma: export
#include "cdp/config.hpp"        // IWYU pragma: export
#include "cdp/dataset.hpp"       // IWYU pragma: export
#include "cdp/evaluation.hpp"    // IWYU pragma: export
#include "cdp/image.hpp"         // IWYU pragma: export
#include "cdp/ini.hpp"           // IWYU pragma: export
#include "cdp/metrics.hpp"       // IWYU pragma: export
#include "cdp/nn.hpp"            // IWYU pragma: export
#include "cdp/optim.hpp"         // IWYU pragma: export
#include "cdp/pipeline.hpp"      // IWYU pragma: export
#include "cdp/png_io.hpp"        // IWYU pragma: export
#include "cdp/rng.hpp"           // IWYU pragma: export
#include "cdp/setup.hpp"         // IWYU pragma: export
#include "cdp/split.hpp"         // IWYU pragma: export
#include "cdp/tensor.hpp"        // IWYU pragma: export
#include "cdp/types.hpp"         // IWYU pragma: export
