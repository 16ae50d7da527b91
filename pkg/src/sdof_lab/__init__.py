"""Secure degrees of freedom of the two-user MIMO multiple-access wiretap channel.

Precoder synthesis for every (N, K) regime, numerical certification of
alignment and decodability, and Monte-Carlo / log-det evaluation of the
resulting secure rates.
"""

__version__ = "0.1.0"
