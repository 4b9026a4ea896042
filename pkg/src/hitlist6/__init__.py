"""Passive IPv6 hitlist analysis: address categorization, EUI-64 tracking,
alias backscanning and wired/WiFi MAC geolocation linkage."""

from .addr import InterfaceId, Ipv6Address, Prefix, entropy_band, normalized_iid_entropy, parse_ipv6
from .classify import AddressCategory, categorize, classify_addresses, profile_distribution
from .errors import HitlistError
from .eui64 import MacAddress, Oui, embed_mac, extract_mac, is_apparent_eui64
from .prefixmap import PrefixTable, build_table, lookup_longest

__version__ = "0.1.0"

__all__ = [
    "AddressCategory", "HitlistError", "InterfaceId", "Ipv6Address", "MacAddress", "Oui", "Prefix",
    "PrefixTable", "build_table", "categorize", "classify_addresses", "embed_mac", "entropy_band",
    "extract_mac", "is_apparent_eui64", "lookup_longest", "normalized_iid_entropy", "parse_ipv6",
    "profile_distribution",
]
