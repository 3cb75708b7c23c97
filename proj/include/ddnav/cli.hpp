#pragma once

namespace ddnav::cli {

// Entry point of the ddnav command. Returns 0 on success, 1 on a domain
// error (one-line diagnostic on stderr) and 2 on a usage error.
int dispatch(int argc, const char* const* argv);

}  // namespace ddnav::cli
