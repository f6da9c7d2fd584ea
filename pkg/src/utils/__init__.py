from .logging_config import setup_logging, resolve_level
from .hashing import canonical_json, sha256_payload, write_json
