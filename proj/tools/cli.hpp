#ifndef VDBLUR_CLI_HPP
#define VDBLUR_CLI_HPP

namespace vdblur::cli {

// Entry point for the vdblur tool. Returns 0 on success, 1 on usage errors
// and 2 on runtime failures.
int run(int argc, const char* const* argv);

}  // namespace vdblur::cli

#endif
