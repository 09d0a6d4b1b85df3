class CmcsError(Exception):
    ...


class ContractViolation(CmcsError):
    ...


class SerializeError(CmcsError):
    ...


class InstanceFormatError(SerializeError):
    ...
