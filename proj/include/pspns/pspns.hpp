#pragma once

#include "pspns/config.hpp"
#include "pspns/dataset.hpp"
#include "pspns/graph.hpp"
#include "pspns/io.hpp"
#include "pspns/linalg.hpp"
#include "pspns/matrix.hpp"
#include "pspns/model.hpp"
#include "pspns/pipeline.hpp"
#include "pspns/psp.hpp"
#include "pspns/rng.hpp"
#include "pspns/sampler.hpp"
#include "pspns/svd_oracle.hpp"
#include "pspns/synth.hpp"
#include "pspns/train_eval.hpp"
