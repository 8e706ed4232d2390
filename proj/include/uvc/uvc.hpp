#pragma once

#include "uvc/errors.hpp"
#include "uvc/types.hpp"
#include "uvc/lmi_program.hpp"
#include "uvc/sdp.hpp"
#include "uvc/lmi_core.hpp"
#include "uvc/analysis.hpp"
#include "uvc/synthesis.hpp"
#include "uvc/simulation.hpp"
#include "uvc/models.hpp"
