// Copyright 2026 The cpdil Authors
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

#ifndef CPDIL_CPDIL_HPP
#define CPDIL_CPDIL_HPP

// Numerical core. The JSON and command-line layers (json_io.hpp, cli.hpp)
// are included separately since they need the vendored single headers.

#include "cpdil/chan.hpp"
#include "cpdil/commutant.hpp"
#include "cpdil/dilation.hpp"
#include "cpdil/linalg.hpp"
#include "cpdil/prodsys.hpp"
#include "cpdil/stochastic.hpp"
#include "cpdil/strongcomm.hpp"
#include "cpdil/types.hpp"

#endif  // CPDIL_CPDIL_HPP
