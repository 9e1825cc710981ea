"""Standalone fixture services: imaging (canonical XML over HTTP),
spectrometry (REST), environment station (TCP frames)."""
