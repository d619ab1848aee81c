#pragma once

#include "config.hpp"

namespace fdx::cli {

// Each command writes its artifacts into ctx.out_dir and returns the exit code.
int cmd_derive(const RunContext& ctx);
int cmd_profile(const RunContext& ctx);
int cmd_phase(const RunContext& ctx);
int cmd_classify(const RunContext& ctx);
int cmd_find_astar(const RunContext& ctx);
int cmd_verify(const RunContext& ctx);
int cmd_fig1(const RunContext& ctx);
int cmd_pde(const RunContext& ctx);

}  // namespace fdx::cli
