"""Submaximality of Pol{rho, sigma} below Pol rho for central relations."""
