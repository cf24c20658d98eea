#pragma once

#include <stdexcept>

namespace twsim
{
    // Time Warp invariant violated (rollback below GVT, GVT regression, ...).
    class ProtocolError : public std::logic_error
    {
    public:
        using std::logic_error::logic_error;
    };

    // Another participant of the run failed and told us to stop.
    class RemoteAbort : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
}
