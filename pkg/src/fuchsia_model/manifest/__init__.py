"""Component manifests: parsing, validation, include merging."""

from .errors import (
    DuplicateChildName,
    IncludeCycle,
    IncludeNotFound,
    InvalidDecl,
    ManifestError,
    ManifestSyntaxError,
    UnknownCapabilityType,
    UnknownRightsToken,
)
from .model import (
    ALL_RIGHTS,
    BASE_RIGHTS,
    CAPABILITY_TYPES,
    RIGHTED_TYPES,
    RIGHTS_TOKENS,
    CapabilityDecl,
    ChildDecl,
    CollectionDecl,
    ComponentManifest,
    ExposeDecl,
    OfferDecl,
    ProgramBlock,
    RightsSet,
    UseDecl,
    expand_rights,
    rights_tokens,
)
from .parse import dump_manifest, manifest_to_doc, merge_includes, parse_manifest
from .validate import Diagnostic, validate_manifest

__all__ = [
    "ALL_RIGHTS",
    "BASE_RIGHTS",
    "CAPABILITY_TYPES",
    "RIGHTED_TYPES",
    "RIGHTS_TOKENS",
    "CapabilityDecl",
    "ChildDecl",
    "CollectionDecl",
    "ComponentManifest",
    "Diagnostic",
    "DuplicateChildName",
    "ExposeDecl",
    "IncludeCycle",
    "IncludeNotFound",
    "InvalidDecl",
    "ManifestError",
    "ManifestSyntaxError",
    "OfferDecl",
    "ProgramBlock",
    "RightsSet",
    "UnknownCapabilityType",
    "UnknownRightsToken",
    "UseDecl",
    "dump_manifest",
    "expand_rights",
    "manifest_to_doc",
    "merge_includes",
    "parse_manifest",
    "rights_tokens",
    "validate_manifest",
]
