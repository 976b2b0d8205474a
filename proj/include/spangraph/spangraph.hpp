// Copyright 2026 The spangraph Authors.
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


// Umbrella header.

#ifndef SPANGRAPH_SPANGRAPH_HPP_
#define SPANGRAPH_SPANGRAPH_HPP_

#include "spangraph/autograd.hpp"
#include "spangraph/checkpoint.hpp"
#include "spangraph/config.hpp"
#include "spangraph/corpus.hpp"
#include "spangraph/edit_decode.hpp"
#include "spangraph/encoder.hpp"
#include "spangraph/error.hpp"
#include "spangraph/graph_builder.hpp"
#include "spangraph/graph_transformer.hpp"
#include "spangraph/losses.hpp"
#include "spangraph/metrics.hpp"
#include "spangraph/model.hpp"
#include "spangraph/mpgnn.hpp"
#include "spangraph/nn.hpp"
#include "spangraph/optim.hpp"
#include "spangraph/report.hpp"
#include "spangraph/synthetic.hpp"
#include "spangraph/trainer.hpp"

#endif  // SPANGRAPH_SPANGRAPH_HPP_
