#pragma once

#include "gendir/aggregate.hpp"
#include "gendir/analysis.hpp"
#include "gendir/corpus.hpp"
#include "gendir/csv.hpp"
#include "gendir/embedding_io.hpp"
#include "gendir/error.hpp"
#include "gendir/occupations.hpp"
#include "gendir/probe.hpp"
#include "gendir/report.hpp"
#include "gendir/rng.hpp"
#include "gendir/roster.hpp"
#include "gendir/stats.hpp"
#include "gendir/subspace.hpp"
#include "gendir/synthetic.hpp"
#include "gendir/validate.hpp"
