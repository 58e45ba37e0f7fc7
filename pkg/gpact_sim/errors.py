"""Exception hierarchy for gpact-sim.

Hard errors (`SimulationError`, `ProtocolError` and its subclasses) reject a
whole transaction: the chain records a failure receipt and no state changes.
`ApplicationError`s are raised by business logic and are turned into
`outcome=error` Segment Events or abort decisions by the control contract.
"""


class GpactError(Exception):
    """Base class for all errors raised by gpact-sim."""


class ConfigError(GpactError, ValueError):
    """Invalid configuration value."""


class SimulationError(GpactError, ValueError):
    """Misuse of the chain simulator (unknown chain, contract, index...)."""


class PostStateError(GpactError, AssertionError):
    """A scenario finished with storage that does not match its expected state."""


class TreeSimulationError(GpactError, ValueError):
    """Simulating a call execution tree failed."""


class NondeterministicTreeError(TreeSimulationError):
    """The simulated business logic depends on the block being executed in."""


class ProtocolError(GpactError, ValueError):
    """A control contract operation was rejected."""


class ReplayError(ProtocolError):
    """The (role, path) entry was already consumed for this transaction."""


class TransactionTimedOutError(ProtocolError):
    """The operation was submitted after the transaction timeout."""


class MissingChildSegmentError(ProtocolError):
    """A child Segment Event required by a segment or root was not supplied."""


class UnresolvablePathError(ProtocolError):
    """A call path does not resolve to a node on this chain."""


class NotCoordinatorError(ProtocolError):
    """Only the registered coordinator may submit this operation now."""


class DuplicateTransactionError(ProtocolError):
    """The transaction id was already started on this chain."""


class RootChainMismatchError(ProtocolError):
    """The operation was submitted to a chain that is not the root chain."""


class NoLocksHeldError(ProtocolError):
    """Signalling was requested for a transaction holding no locks here."""


class AttestationError(ProtocolError):
    """An attested event could not be verified."""


class UnknownSourceChainError(AttestationError):
    """No signer set is registered for the event's source chain."""


class ThresholdNotMetError(AttestationError):
    """Fewer than threshold distinct valid signatures were supplied."""


class NoRelayedHeaderError(AttestationError):
    """The header the proof refers to has not been relayed."""


class ProofMismatchError(AttestationError):
    """The inclusion proof does not match the relayed header."""


class WrongEmitterError(AttestationError):
    """The event was not emitted by the registered control contract."""


class ModeMismatchError(AttestationError):
    """The proof variant does not match the configured attestation mode."""


class ConflictingHeaderError(AttestationError):
    """A different header is already stored for this chain and height."""


class RegistrationError(AttestationError):
    """Invalid or duplicate registrar registration."""


class ApplicationError(GpactError):
    """Business logic failed while executing a segment or root."""


class ContractLockedError(ApplicationError):
    """The contract is locked by a crosschain transaction."""


class CrossCallMismatchError(ApplicationError):
    """An actual crosschain call does not match the committed call tree."""


class RevertError(ApplicationError):
    """The business function reverted."""
