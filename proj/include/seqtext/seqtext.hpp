#pragma once

#include "seqtext/cells.hpp"
#include "seqtext/checkpoint.hpp"
#include "seqtext/config.hpp"
#include "seqtext/dataset.hpp"
#include "seqtext/embedding.hpp"
#include "seqtext/engine.hpp"
#include "seqtext/errors.hpp"
#include "seqtext/metrics.hpp"
#include "seqtext/model.hpp"
#include "seqtext/numeric.hpp"
#include "seqtext/random.hpp"
#include "seqtext/synthetic.hpp"
#include "seqtext/text.hpp"
