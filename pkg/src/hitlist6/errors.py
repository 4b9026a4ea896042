"""Exception hierarchy shared by every hitlist6 module."""


class HitlistError(Exception):
    """Base class; ``kind`` is the machine-readable error tag used by the CLI."""

    kind = "error"

    def to_dict(self) -> dict:
        return {"error": self.kind, "message": str(self)}


class AddressParseError(HitlistError, ValueError):
    kind = "malformed"

    def __init__(self, text: str, position: int, reason: str):
        self.text = text
        self.position = position
        self.reason = reason
        super().__init__(f"malformed IPv6 address {text!r} at position {position}: {reason}")

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["position"] = self.position
        return d


class NotEui64Error(HitlistError, ValueError):
    kind = "not-EUI64"


class EmptyInputError(HitlistError, ValueError):
    kind = "empty-input"


class PrefixFileError(HitlistError, ValueError):
    kind = "prefix-file"

    def __init__(self, path, offenders: list[tuple[int, str]], total_bad: int):
        self.path = path
        self.offenders = offenders[:10]
        self.total_bad = total_bad
        shown = "; ".join(f"line {n}: {line!r}" for n, line in self.offenders)
        super().__init__(f"{path}: {total_bad} malformed line(s): {shown}")


class UnplannedResponseError(HitlistError, ValueError):
    kind = "unplanned-response"


class ScenarioError(HitlistError, ValueError):
    kind = "scenario"


class ConfigError(HitlistError):
    kind = "config"


class IngestError(HitlistError):
    kind = "ingest"
