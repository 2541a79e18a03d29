#pragma once

#include "prionlab/params.hpp"
#include "prionlab/grid.hpp"
#include "prionlab/frag_operator.hpp"
#include "prionlab/scheme.hpp"
#include "prionlab/linear_gf.hpp"
#include "prionlab/prion_system.hpp"
#include "prionlab/reduction.hpp"
#include "prionlab/stability.hpp"
#include "prionlab/fitting.hpp"
#include "prionlab/io.hpp"
#include "prionlab/verify.hpp"
