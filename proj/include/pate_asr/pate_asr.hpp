//
// Copyright 2026 The pate-asr Authors
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
//
#ifndef PATE_ASR_PATE_ASR_HPP_
#define PATE_ASR_PATE_ASR_HPP_

// Everything at once. Individual headers can be included on their own.

#include "pate_asr/accountant.hpp"
#include "pate_asr/corpus.hpp"
#include "pate_asr/csv.hpp"
#include "pate_asr/dpsgd.hpp"
#include "pate_asr/edit_distance.hpp"
#include "pate_asr/error.hpp"
#include "pate_asr/experiment.hpp"
#include "pate_asr/matrix.hpp"
#include "pate_asr/mechanisms.hpp"
#include "pate_asr/mia.hpp"
#include "pate_asr/parallel.hpp"
#include "pate_asr/pate.hpp"
#include "pate_asr/random.hpp"
#include "pate_asr/seqmodel/checkpoint.hpp"
#include "pate_asr/seqmodel/ctc.hpp"
#include "pate_asr/seqmodel/decode.hpp"
#include "pate_asr/seqmodel/logmath.hpp"
#include "pate_asr/seqmodel/losses.hpp"
#include "pate_asr/seqmodel/model.hpp"
#include "pate_asr/seqmodel/params.hpp"
#include "pate_asr/seqmodel/rnnt.hpp"
#include "pate_asr/seqmodel/train.hpp"
#include "pate_asr/version.hpp"

#endif  // PATE_ASR_PATE_ASR_HPP_
