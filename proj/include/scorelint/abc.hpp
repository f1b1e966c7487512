#pragma once

#include "scorelint/abc_parser.hpp"
#include "scorelint/abc_validate.hpp"
#include "scorelint/abc_writer.hpp"
