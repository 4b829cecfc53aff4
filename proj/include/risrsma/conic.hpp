#pragma once

#include "risrsma/conic/check.hpp"
#include "risrsma/conic/ipm.hpp"
#include "risrsma/conic/program.hpp"
#include "risrsma/conic/standard_form.hpp"
