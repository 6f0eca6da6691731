# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled word-generation kernel.

Implements the same counter-based SplitMix64 stream as
``randprompt_ad.rng`` / ``randprompt_ad._pygen``: draw ``i`` (1-based)
is ``mix64(seed + i * GAMMA)``, a word consumes one length draw followed
by one draw per character. Restricted to ASCII alphabets; the prompt
module falls back to the pure backend otherwise.
"""

from cpython.unicode cimport PyUnicode_DecodeASCII
from libc.stdint cimport uint64_t
from libc.stdlib cimport free, malloc

cdef uint64_t GAMMA = <uint64_t>0x9E3779B97F4A7C15


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline uint64_t below(uint64_t x, uint64_t bound) noexcept nogil:
    # Multiply-high in 32-bit halves: exact floor(x * bound / 2**64)
    # for bound < 2**32, matching SplitMix64.next_below bit for bit.
    cdef uint64_t lo = (x & <uint64_t>0xFFFFFFFF) * bound
    cdef uint64_t hi = (x >> 32) * bound
    return (hi + (lo >> 32)) >> 32


def generate_words(seed, Py_ssize_t count, int l_min, int l_max, str alphabet):
    """Generate ``count`` random words from a fresh stream seeded with ``seed``."""
    cdef uint64_t s = <uint64_t>seed
    cdef bytes alpha_bytes = alphabet.encode("ascii")
    cdef const unsigned char* alpha = alpha_bytes
    cdef uint64_t n_alpha = <uint64_t>len(alpha_bytes)
    cdef uint64_t span = <uint64_t>(l_max - l_min + 1)
    cdef uint64_t counter = 0
    cdef Py_ssize_t i
    cdef int j, length
    cdef char* buf = <char*>malloc(l_max if l_max > 0 else 1)
    if buf == NULL:
        raise MemoryError()
    out = []
    try:
        for i in range(count):
            counter += 1
            length = l_min + <int>below(mix64(s + counter * GAMMA), span)
            for j in range(length):
                counter += 1
                buf[j] = <char>alpha[below(mix64(s + counter * GAMMA), n_alpha)]
            out.append(PyUnicode_DecodeASCII(buf, length, NULL))
    finally:
        free(buf)
    return out
