#pragma once

#include "cianids/attacks.hpp"
#include "cianids/domain_knowledge.hpp"
#include "cianids/error.hpp"
#include "cianids/evaluator.hpp"
#include "cianids/explainer.hpp"
#include "cianids/flow_store.hpp"
#include "cianids/learners.hpp"
#include "cianids/metrics.hpp"
#include "cianids/resampler.hpp"
#include "cianids/rng.hpp"
