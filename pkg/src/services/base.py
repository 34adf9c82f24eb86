"""
Base service shared by the numerical services
"""

import logging

from data.config import Controls
from data.entities import ModelParams


class BaseService:
    """
    Base Service Class
    """

    params: ModelParams
    controls: Controls
    logger: logging.Logger

    def __init__(self, params: ModelParams, controls: Controls | None = None) -> None:
        """
        Base Service Constructor binding the model parameters and numerical controls.
        """
        self.params = params
        self.controls = controls or Controls()
        self.logger = logging.getLogger(__name__)
