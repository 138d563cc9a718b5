class InvalidInstance(ValueError):
    def __init__(self, message: str, diagnostic: str = ""):
        super().__init__(message if not diagnostic else f"{message}: {diagnostic}")
        self.diagnostic = diagnostic or message


class InstanceParseError(InvalidInstance):
    def __init__(self, message: str, line: int, source: str = "<instance>"):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line
        self.source = source


class GenerationExhausted(RuntimeError):
    def __init__(self, domain: str, attempts: int):
        super().__init__(f"Could not generate a valid {domain} instance in {attempts} attempts")
        self.domain = domain
        self.attempts = attempts
