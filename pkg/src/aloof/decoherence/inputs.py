"""Bundled physics inputs shared by all decoherence expressions."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..physics import BeamParams, InteractionGeometry, Material


@dataclass(frozen=True)
class DecoherenceInput:
    """Material, beam and geometry; the interaction time is L / v."""

    material: Material
    beam: BeamParams
    geometry: InteractionGeometry
    interaction_time: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "interaction_time",
                           self.geometry.plate_length / self.beam.velocity)

    @property
    def dx(self):
        return self.geometry.path_separation

    def with_separation(self, dx):
        from dataclasses import replace
        return DecoherenceInput(self.material, self.beam,
                                replace(self.geometry, path_separation=dx))

    def with_material(self, material):
        return DecoherenceInput(material, self.beam, self.geometry)
