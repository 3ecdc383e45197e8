#pragma once

#include "evalkit/checker.hpp"
#include "evalkit/corpus.hpp"
#include "evalkit/error.hpp"
#include "evalkit/evaluate.hpp"
#include "evalkit/metrics.hpp"
#include "evalkit/report.hpp"
#include "evalkit/sequence.hpp"
#include "evalkit/stats.hpp"
#include "evalkit/textprep.hpp"
