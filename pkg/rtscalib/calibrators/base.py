"""Base calibrator interface for rtscalib."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional

from ..exceptions import ConfigError
from ..schemas import CalibrationResult, GcpSet, InterPrismDistances, SyncedTrajectories


@dataclass
class CalibrationInputs:
    """
    Everything a calibration method may consume.

    Attributes:
        station_gcps: GCP observations of stations 1, 2, 3 (methods A and B)
        world: Surveyed GCP coordinates (optional, methods A and B)
        synced: Synchronized trajectories (methods C and D)
        delta: Premeasured inter-prism distances (method D)
    """
    station_gcps: Optional[List[GcpSet]] = None
    world: Optional[GcpSet] = None
    synced: Optional[SyncedTrajectories] = None
    delta: Optional[InterPrismDistances] = None


class BaseCalibrator(ABC):
    """
    Abstract base class for calibration methods.

    All methods (two-point, static GCP, dynamic GCP, inter-prism) inherit from this
    class and implement the required methods.
    """

    #: Input fields the method cannot run without
    required_inputs: tuple = ()

    def check_inputs(self, inputs: CalibrationInputs) -> None:
        missing = [name for name in self.required_inputs if getattr(inputs, name) is None]
        if missing:
            raise ConfigError(
                f"{self.__class__.__name__} is missing inputs: {', '.join(missing)}"
            )

    @abstractmethod
    def calibrate(self, inputs: CalibrationInputs) -> CalibrationResult:
        """
        Estimate T_12 and T_13.

        Args:
            inputs: Method inputs

        Returns:
            Calibration result
        """
        pass

    @abstractmethod
    def get_calibrator_info(self) -> Dict:
        """
        Return metadata about this calibrator configuration.

        Returns:
            Dictionary containing the method tag and its settings
        """
        pass
