"""Gerarchia delle eccezioni di dynmap.

Le operazioni singole le sollevano; gli scan intercettano quelle numeriche e
le trasformano in flag di riga.
"""


class DynmapError(Exception):
    """Base di tutti gli errori sollevati da dynmap."""


class ConfigError(DynmapError):
    """Configurazione, tolleranza o parametro del modello non valido."""


class DomainError(DynmapError):
    """Richiesto un tempo fuori dal dominio della famiglia."""

    def __init__(self, t: float, t_min: float, t_max: float):
        super().__init__(f"t={t!r} outside domain [{t_min!r}, {t_max!r}]")
        self.t = t
        self.t_min = t_min
        self.t_max = t_max


class DimensionError(DynmapError):
    """Dimensioni di matrici incompatibili."""


class NumericalError(DynmapError):
    """Precondizione numerica violata (singolare, divergente, non rappresentabile)."""


class NonFiniteMatrix(NumericalError):
    pass


class NotHermitian(NumericalError):
    def __init__(self, asymmetry: float):
        super().__init__(f"matrix is not Hermitian (max asymmetry {asymmetry:.3e})")
        self.asymmetry = asymmetry


class SingularMap(NumericalError):
    """Matrice di processo non invertibile: scatta il testimone NI."""

    def __init__(self, min_sv: float, max_sv: float = 1.0):
        super().__init__(f"process matrix is singular (min_sv={min_sv:.3e}, max_sv={max_sv:.3e})")
        self.min_sv = min_sv
        self.max_sv = max_sv


class SingularGenerator(NumericalError):
    """Il generatore time-local diverge in t (zero di un denominatore dei rate)."""

    def __init__(self, t: float, reason: str = ""):
        msg = f"generator is singular at t={t!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.t = t


class StepTooLarge(NumericalError):
    pass


class ResidualTooLarge(NumericalError):
    """Il generatore non ammette forma GKSL."""

    def __init__(self, residual: float, bound: float):
        super().__init__(f"reconstruction residual {residual:.3e} exceeds {bound:.3e}")
        self.residual = residual
        self.bound = bound


class ExpmOverflow(NumericalError):
    pass
