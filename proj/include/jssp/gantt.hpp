#pragma once

#include <string>

#include "jssp/env.hpp"

namespace jssp {

// SVG Gantt chart: one row per machine, time on x, one <rect> per
// operation labelled "job.pos". Each rect carries data-job, data-pos,
// data-machine, data-start and data-end attributes.
// num_machines < 0 means "highest machine index in the schedule + 1".
std::string render_gantt_svg(const Schedule& sched, int num_machines = -1);

}  // namespace jssp
