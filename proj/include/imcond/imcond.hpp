#pragma once

#include "imcond/assoc_finder.hpp"
#include "imcond/dist.hpp"
#include "imcond/engine.hpp"
#include "imcond/error.hpp"
#include "imcond/mcmc.hpp"
#include "imcond/models/bvn.hpp"
#include "imcond/models/gamma2.hpp"
#include "imcond/models/nile.hpp"
#include "imcond/models/normal_mean.hpp"
#include "imcond/models/student_t.hpp"
#include "imcond/models/var_comp.hpp"
#include "imcond/parallel.hpp"
#include "imcond/prs.hpp"
#include "imcond/quad.hpp"
#include "imcond/rng.hpp"
#include "imcond/special.hpp"
#include "imcond/validate.hpp"
