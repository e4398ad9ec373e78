#pragma once

#include "tirepde/errors.hpp"
#include "tirepde/model.hpp"
#include "tirepde/sensors.hpp"
#include "tirepde/trace.hpp"
#include "tirepde/transport.hpp"
#include "tirepde/frequency.hpp"
#include "tirepde/lambert_w.hpp"
#include "tirepde/vector_fit.hpp"
#include "tirepde/kernel.hpp"
#include "tirepde/observer.hpp"
#include "tirepde/config.hpp"
#include "tirepde/svg.hpp"
#include "tirepde/acceptance.hpp"
#include "tirepde/scenario.hpp"
