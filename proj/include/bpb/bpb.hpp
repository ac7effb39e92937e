#pragma once

#include "bpb/codec.hpp"
#include "bpb/criterion.hpp"
#include "bpb/engine.hpp"
#include "bpb/error.hpp"
#include "bpb/experiment.hpp"
#include "bpb/objectives.hpp"
#include "bpb/parallel.hpp"
#include "bpb/perf.hpp"
#include "bpb/rng.hpp"
#include "bpb/search.hpp"
#include "bpb/space.hpp"
