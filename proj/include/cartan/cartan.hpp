#pragma once

#include "cartan/core.hpp"
#include "cartan/lie_group.hpp"
#include "cartan/parallel.hpp"
#include "cartan/quadrature.hpp"
#include "cartan/integrator.hpp"
#include "cartan/forms.hpp"
#include "cartan/evolution.hpp"
#include "cartan/presets.hpp"
#include "cartan/flat_group.hpp"
#include "cartan/semidirect.hpp"
