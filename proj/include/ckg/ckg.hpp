#pragma once

#include "ckg/adjustment.hpp"
#include "ckg/cohort.hpp"
#include "ckg/config.hpp"
#include "ckg/dag.hpp"
#include "ckg/date.hpp"
#include "ckg/error.hpp"
#include "ckg/evaluation.hpp"
#include "ckg/glm.hpp"
#include "ckg/graph.hpp"
#include "ckg/hypothesis.hpp"
#include "ckg/lasso.hpp"
#include "ckg/mediation.hpp"
#include "ckg/multiple_testing.hpp"
#include "ckg/node.hpp"
#include "ckg/pipeline.hpp"
#include "ckg/report.hpp"
#include "ckg/rng.hpp"
#include "ckg/sample.hpp"
#include "ckg/synth.hpp"
#include "ckg/types.hpp"
