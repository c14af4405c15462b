from protkin.errors import ParseError


def decode(data: bytes) -> str:
    """UTF-8 text of an input file; an undecodable byte is a ParseError at its line and column."""
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data.count(b"\n", 0, e.start) + 1
        column = e.start - (data.rfind(b"\n", 0, e.start) + 1) + 1
        raise ParseError(f"invalid UTF-8 byte 0x{data[e.start]:02x}", line, column) from None


def read_text(path: str) -> str:
    with open(path, "rb") as f:
        return decode(f.read())
