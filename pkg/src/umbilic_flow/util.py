from typing import Iterable
import logging
import math
import re

__FLOAT_PATTERN = r'[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?'

__FLOAT_METAS = [
    {
        'pattern': re.compile(r'^({})$'.format(__FLOAT_PATTERN)),
        'parser': lambda m: float(m.group(1))
    },
    {
        'pattern': re.compile(r'^([+-]?)pi$'),
        'parser': lambda m: -math.pi if m.group(1) == '-' else math.pi
    },
    {
        'pattern': re.compile(r'^({})\s*\*\s*pi$'.format(__FLOAT_PATTERN)),
        'parser': lambda m: float(m.group(1)) * math.pi
    },
    {
        'pattern': re.compile(r'^([+-]?)pi\s*/\s*({})$'.format(__FLOAT_PATTERN)),
        'parser': lambda m: (-1.0 if m.group(1) == '-' else 1.0) * math.pi / float(m.group(2))
    },
    {
        'pattern': re.compile(r'^({})\s*\*\s*pi\s*/\s*({})$'.format(__FLOAT_PATTERN, __FLOAT_PATTERN)),
        'parser': lambda m: float(m.group(1)) * math.pi / float(m.group(2))
    }
]

def parse_float_expr(number: str) -> float:
    """Parse a float, optionally written as a multiple or fraction of pi

    Supported forms are plain floats (`0.25`, `1e-3`), `pi`, `c*pi`,
    `pi/d` and `c*pi/d`.

    Args:
        number (str): formatted number

    Raises:
        ValueError: if number is not in a supported format or is not finite

    Returns:
        float: parsed value
    """

    text = number.strip()
    for meta in __FLOAT_METAS:
        if res := re.match(meta['pattern'], text):
            value = meta['parser'](res)
            if not math.isfinite(value):
                raise ValueError('number \"{}\" is not finite'.format(number))
            return value

    raise ValueError('number \"{}\" is not in a supported format'.format(number))


def parse_int(number: str) -> int:
    """Parse a decimal integer

    Args:
        number (str): formatted integer

    Raises:
        ValueError: if number is not a decimal integer

    Returns:
        int: parsed integer
    """

    res = re.match(r'^[+-]?\d+$', number.strip())
    if not res:
        raise ValueError('number \"{}\" is not a valid integer'.format(number))

    return int(res.group(0))


__BOOL_WORDS = {
    'true': True, 'yes': True, 'on': True, '1': True,
    'false': False, 'no': False, 'off': False, '0': False
}

def parse_bool(word: str) -> bool:
    """Parse a boolean word (true/false, yes/no, on/off, 1/0)

    Raises:
        ValueError: if word is not a boolean word
    """

    key = word.strip().lower()
    if key not in __BOOL_WORDS:
        raise ValueError('value \"{}\" is not a boolean'.format(word))

    return __BOOL_WORDS[key]


def parse_grid_list(grid_list: str) -> list[int]:
    """Parse a comma separated list of grid sizes

    Args:
        grid_list (str): list such as `64,128,256`

    Raises:
        ValueError: if an entry is not a positive integer or the list is
        not strictly ascending

    Returns:
        list[int]: parsed grid sizes
    """

    entries = [e for e in grid_list.split(',') if e.strip()]
    if not entries:
        raise ValueError('grid list is empty')

    sizes = [parse_int(e) for e in entries]
    if any(n < 1 for n in sizes):
        raise ValueError('grid sizes must be positive integers')
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError('grid sizes must be strictly ascending')

    return sizes


def parse_float_list(float_list: str) -> list[float]:
    """Parse a comma separated list of floats (pi expressions allowed)"""

    return [parse_float_expr(e) for e in float_list.split(',') if e.strip()]


def compose_float_list(values: Iterable[float]) -> str:
    return ', '.join(repr(float(v)) for v in values)


OUTPUT_LOG_LEVEL = 100

def logging_output(msg: object) -> None:
    logging.log(OUTPUT_LOG_LEVEL, msg)
