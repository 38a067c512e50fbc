#pragma once

#include "segtile/baselines.hpp"
#include "segtile/embedding.hpp"
#include "segtile/error.hpp"
#include "segtile/metrics.hpp"
#include "segtile/preprocess.hpp"
#include "segtile/segmenter.hpp"
#include "segtile/similarity.hpp"
#include "segtile/transcript.hpp"
