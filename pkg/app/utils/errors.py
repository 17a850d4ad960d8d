"""Exception hierarchy shared by every vault module.

Each error carries the process exit code the command line reports for it
and, when raised while walking history, the seq of the offending commit.
"""
from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_AUTH = 2
EXIT_INTEGRITY = 3
EXIT_NOT_FOUND = 4
EXIT_INTERNAL = 5


class EdgError(Exception):
    """Base class for all vault errors"""
    exit_code: int = EXIT_INTERNAL

    def __init__(self, message: str = "", seq: Optional[int] = None):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.seq = seq

    def at_seq(self, seq: int) -> "EdgError":
        """Attach the commit seq the error was raised for (first one wins)"""
        if self.seq is None:
            self.seq = seq
        return self

    def __str__(self) -> str:
        if self.seq is not None:
            return f"{self.message} (seq {self.seq})"
        return self.message


# Usage
class UsageError(EdgError):
    exit_code = EXIT_USAGE

class InvalidConfig(UsageError):
    pass

class SeedTooShort(UsageError):
    pass

class DuplicateRecipient(UsageError):
    pass

class EmptyRecipients(UsageError):
    pass

class InputTooLarge(UsageError):
    pass

class MalformedRecord(UsageError):
    pass


# Permission / authentication
class AuthError(EdgError):
    exit_code = EXIT_AUTH

class PermissionDenied(AuthError):
    pass

class CannotOrphanRepo(AuthError):
    pass

class NotARecipient(AuthError):
    pass

class UnwrapFailure(AuthError):
    pass

class BadSignature(AuthError):
    pass

class KeystoreLocked(AuthError):
    pass

class StaleParent(AuthError):
    """Another writer moved the head; refresh and retry"""

class CheckpointRequired(AuthError):
    pass


# Integrity
class IntegrityError(EdgError):
    exit_code = EXIT_INTEGRITY

class IntegrityViolation(IntegrityError):
    pass

class AuthenticationFailure(IntegrityError):
    pass

class MalformedPatch(IntegrityError):
    pass

class BaseLengthMismatch(IntegrityError):
    pass

class MalformedDekFile(IntegrityError):
    pass

class CidCollision(IntegrityError):
    pass

class LedgerCorruption(IntegrityError):
    pass

class VerificationFailed(IntegrityError):
    pass


# Not found
class NotFound(EdgError):
    exit_code = EXIT_NOT_FOUND

class RepoNotFound(NotFound):
    pass

class CommitNotFound(NotFound):
    pass

class MemberNotFound(NotFound):
    pass

class IdentityNotFound(NotFound):
    pass


# Internal
class InternalError(EdgError):
    exit_code = EXIT_INTERNAL

class StorageFull(InternalError):
    pass

class IoFailure(InternalError):
    pass

class EntropyUnavailable(InternalError):
    pass

class NonceExhaustion(InternalError):
    pass
