#pragma once

#include <stdexcept>
#include <string>

namespace tithonus {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define TITHONUS_ERROR(Name)                                         \
    struct Name : Error {                                            \
        Name() : Error(#Name) {}                                     \
        explicit Name(const std::string& m) : Error(#Name ": " + m) {} \
    }

TITHONUS_ERROR(ParseError);
TITHONUS_ERROR(WrongPayloadLength);
TITHONUS_ERROR(UnknownInput);
TITHONUS_ERROR(NegativeFee);
TITHONUS_ERROR(ForbiddenCiphertext);
TITHONUS_ERROR(MalformedKey);
TITHONUS_ERROR(PayloadTooLarge);
TITHONUS_ERROR(InsufficientFunds);
TITHONUS_ERROR(NotAStagedWrite);
TITHONUS_ERROR(NotMultisig);
TITHONUS_ERROR(EmptyContent);
TITHONUS_ERROR(SequenceConflict);
TITHONUS_ERROR(MissingLeadingTx);
TITHONUS_ERROR(IncompleteStream);
TITHONUS_ERROR(BadPrevKey);
TITHONUS_ERROR(PointAtInfinity);
TITHONUS_ERROR(BadLength);
TITHONUS_ERROR(UriTooLong);
TITHONUS_ERROR(TagMismatch);
TITHONUS_ERROR(InactiveSubscription);
TITHONUS_ERROR(BadConfig);
TITHONUS_ERROR(RejectedNonstandard);
TITHONUS_ERROR(RejectedAtOrigin);
TITHONUS_ERROR(UnknownNode);

#undef TITHONUS_ERROR

} // namespace tithonus
