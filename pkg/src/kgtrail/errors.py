"""Exception types shared across the package."""

from __future__ import annotations


class KgTrailError(Exception):
    """Base class for every package-specific error."""


class MalformedPath(KgTrailError):
    """Arrow-notation path text that cannot be parsed."""


class MalformedSelection(KgTrailError):
    """Agent response from which no selection or verdict can be recovered."""


class MissingBinding(KgTrailError):
    """A prompt template slot was left unbound."""


class BadBinding(KgTrailError):
    """A query binding contains characters that would corrupt the query."""


class BackendUnavailable(KgTrailError):
    """The knowledge backend could not be reached."""


class QueryRejected(KgTrailError):
    """The knowledge backend answered but rejected the query."""


class AgentUnavailable(KgTrailError):
    """The live agent endpoint failed or returned an unusable payload."""


class ScriptMismatch(KgTrailError):
    """A scripted agent received a prompt its next record does not match."""


class ScriptExhausted(KgTrailError):
    """A scripted agent ran out of canned responses."""


class NoTopicEntities(KgTrailError):
    """Neither the dataset nor the agent supplied a topic entity."""


class UnreadableDataset(KgTrailError):
    """A dataset file is missing or cannot be read."""


class EmptyAggregate(KgTrailError):
    """Aggregation was requested over zero ledgers."""


class ConfigError(KgTrailError):
    """Invalid configuration file, flag value, or script file."""
