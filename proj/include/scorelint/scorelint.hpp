#pragma once

#include "scorelint/abc.hpp"
#include "scorelint/adherence.hpp"
#include "scorelint/config.hpp"
#include "scorelint/cosiatec.hpp"
#include "scorelint/instruments.hpp"
#include "scorelint/plan.hpp"
#include "scorelint/playability.hpp"
#include "scorelint/rational.hpp"
#include "scorelint/readability.hpp"
#include "scorelint/report.hpp"
#include "scorelint/score.hpp"
