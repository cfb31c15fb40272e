#pragma once

#include "mhp/analysis.hpp"
#include "mhp/background.hpp"
#include "mhp/baselines.hpp"
#include "mhp/catalog.hpp"
#include "mhp/config.hpp"
#include "mhp/errors.hpp"
#include "mhp/excitation.hpp"
#include "mhp/io.hpp"
#include "mhp/priors.hpp"
#include "mhp/sampler/chain.hpp"
#include "mhp/sampler/common.hpp"
#include "mhp/sampler/etas.hpp"
#include "mhp/sampler/nonpar.hpp"
#include "mhp/sampler/semipar.hpp"
#include "mhp/simulate.hpp"
#include "mhp/stats.hpp"
