#pragma once

#include "pkgloss/constants.hpp"
#include "pkgloss/errors.hpp"
#include "pkgloss/fields.hpp"
#include "pkgloss/gamma_table.hpp"
#include "pkgloss/geometry.hpp"
#include "pkgloss/grid.hpp"
#include "pkgloss/io/checksum.hpp"
#include "pkgloss/io/config.hpp"
#include "pkgloss/io/csv.hpp"
#include "pkgloss/io/ini.hpp"
#include "pkgloss/io/reference.hpp"
#include "pkgloss/io/report.hpp"
#include "pkgloss/io/trace_io.hpp"
#include "pkgloss/lossbudget.hpp"
#include "pkgloss/materials.hpp"
#include "pkgloss/s21fit.hpp"
#include "pkgloss/solver.hpp"
#include "pkgloss/svg.hpp"
#include "pkgloss/version.hpp"
