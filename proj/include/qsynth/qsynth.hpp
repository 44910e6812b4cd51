#pragma once

#include "qsynth/attack.hpp"
#include "qsynth/data/balance.hpp"
#include "qsynth/data/epoch_file.hpp"
#include "qsynth/data/generators.hpp"
#include "qsynth/data/text_format.hpp"
#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/eval/metrics.hpp"
#include "qsynth/eval/stats.hpp"
#include "qsynth/eval/sweep.hpp"
#include "qsynth/experiment/config.hpp"
#include "qsynth/experiment/pipeline.hpp"
#include "qsynth/nn/checkpoint.hpp"
#include "qsynth/nn/model.hpp"
#include "qsynth/nn/model_spec.hpp"
#include "qsynth/nn/train.hpp"
#include "qsynth/oracle.hpp"
#include "qsynth/rng.hpp"
#include "qsynth/synthesis/active.hpp"
#include "qsynth/synthesis/boundary_search.hpp"
#include "qsynth/synthesis/config.hpp"
#include "qsynth/synthesis/jacobian.hpp"
#include "qsynth/synthesis/one_vs_one.hpp"
#include "qsynth/synthesis/pair.hpp"
#include "qsynth/synthesis/trace.hpp"
#include "qsynth/version.hpp"
