#pragma once

#include "matchprior/coverage.hpp"
#include "matchprior/credible.hpp"
#include "matchprior/errors.hpp"
#include "matchprior/family.hpp"
#include "matchprior/matching.hpp"
#include "matchprior/measure.hpp"
#include "matchprior/model.hpp"
#include "matchprior/posterior.hpp"
#include "matchprior/transport.hpp"
