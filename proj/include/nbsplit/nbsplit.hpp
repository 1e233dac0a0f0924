// SPDX-License-Identifier: Apache-2.0
//
// nbsplit — wideband near-field channel estimation with beam-split-aware
// sparse recovery
// Copyright (C) 2026 the nbsplit authors
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

#ifndef NBSPLIT_NBSPLIT_HPP
#define NBSPLIT_NBSPLIT_HPP

#include "nbsplit/array.hpp"
#include "nbsplit/beam_split.hpp"
#include "nbsplit/channel.hpp"
#include "nbsplit/dictionary.hpp"
#include "nbsplit/estimators.hpp"
#include "nbsplit/harness.hpp"
#include "nbsplit/rng.hpp"
#include "nbsplit/version.hpp"

#endif
