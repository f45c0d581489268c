#pragma once

#include <stdexcept>
#include <string>

namespace semrob {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid argument or violated precondition.
struct param_error : error {
    using error::error;
};

// Malformed input file; message carries the offending line number.
struct format_error : error {
    using error::error;
};

// Operation needs a generative model (or a specific node position) that the
// given graph does not provide.
struct unsupported_error : error {
    using error::error;
};

// A plan op is illegal against the graph state it is replayed onto.
struct replay_error : error {
    using error::error;
};

struct rewire_conflict_error : error {
    using error::error;
};

struct empty_candidate_error : error {
    using error::error;
};

struct empty_sample_error : error {
    using error::error;
};

// Non-finite value where a finite one is required.
struct numeric_error : error {
    using error::error;
};

// Problem too large for exhaustive enumeration.
struct size_error : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

}  // namespace semrob
