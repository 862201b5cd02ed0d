"""Machine-readable classification tables and their batch verification."""
from .schema import CatalogEntry, CatalogError, catalog_dir, catalog_hash, load_catalog
from .verify import (CheckResult, EntryReport, VerificationReport, concrete_instance,
                     verify_aet_ref, verify_all, verify_entry)

__all__ = [
    "CatalogEntry", "CatalogError", "CheckResult", "EntryReport", "VerificationReport",
    "catalog_dir", "catalog_hash", "concrete_instance", "load_catalog", "verify_aet_ref",
    "verify_all", "verify_entry",
]
