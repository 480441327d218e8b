#pragma once

#include "robustcounter/model.hpp"
#include "robustcounter/standard_form.hpp"
#include "robustcounter/solver_options.hpp"
#include "robustcounter/simplex.hpp"
#include "robustcounter/milp.hpp"
#include "robustcounter/cone.hpp"
#include "robustcounter/text_format.hpp"
#include "robustcounter/uncertainty.hpp"
#include "robustcounter/uncertain_set.hpp"
#include "robustcounter/robustify.hpp"
#include "robustcounter/timing.hpp"
#include "robustcounter/sitesel.hpp"
#include "robustcounter/validate.hpp"
