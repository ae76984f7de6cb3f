"""The closed set of programming languages a post can be labelled with.

Codes are stable: the position of the language in alphabetical order.
"""

LANGUAGES = (
    "assembly", "c", "c#", "c++", "coffeescript", "go", "groovy", "haskell",
    "java", "javascript", "lua", "matlab", "objective-c", "perl", "php",
    "python", "r", "ruby", "scala", "sql", "swift", "typescript", "vb.net",
    "vba",
)

N_LANGUAGES = len(LANGUAGES)

_CODES = {name: code for code, name in enumerate(LANGUAGES)}


class UnknownLanguage(ValueError):
    pass


def code_of(name):
    try:
        return _CODES[name]
    except KeyError:
        raise UnknownLanguage(f"not one of the {N_LANGUAGES} languages: {name!r}") from None


def name_of(code):
    if not 0 <= int(code) < N_LANGUAGES:
        raise UnknownLanguage(f"language code out of range: {code}")
    return LANGUAGES[int(code)]
