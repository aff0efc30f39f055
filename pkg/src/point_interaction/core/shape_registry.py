"""Domain shape plugin registry."""

import importlib
import logging
from typing import Any, Dict, Type

from point_interaction.core.base_shape import BaseShape

logger = logging.getLogger("point_interaction")

SUPPORTED_SHAPES = (
    "rectangle",
    "disk",
    "polygon",
    "disk_union",
    "box",
    "ball",
)  # Tuple of supported domain kinds


def _class_name(kind: str) -> str:
    return "".join(part.capitalize() for part in kind.split("_")) + "Shape"


class ShapePluginManager:
    """Shape plugin manager."""

    def __init__(self):
        """Initialize plugin manager."""
        self._shapes: Dict[str, Type[BaseShape]] = {}

    def register_shape(self, kind: str, shape_class: Type[BaseShape]) -> None:
        """Register a shape plugin.

        Args:
            kind: Domain kind
            shape_class: Shape class
        """
        if not issubclass(shape_class, BaseShape):
            raise ValueError(f"Shape class must inherit from BaseShape: {shape_class}")
        self._shapes[kind] = shape_class
        logger.debug(f"Registered shape plugin: {kind}")

    def get_shape(self, kind: str, config: Dict[str, Any]) -> BaseShape:
        """Get a shape instance.

        Args:
            kind: Domain kind
            config: Domain descriptor

        Returns:
            Shape instance

        Raises:
            ValueError: If the kind is not registered
        """
        if kind not in self._shapes:
            raise ValueError(f"Shape not found: {kind}")
        return self._shapes[kind](config)

    def load_shape(self, kind: str) -> None:
        """Load a shape plugin from point_interaction.shapes.

        Args:
            kind: Domain kind, one of SUPPORTED_SHAPES

        Raises:
            ImportError: If the kind is unsupported or the module cannot be imported
            AttributeError: If the class is not found in the module
        """
        if kind not in SUPPORTED_SHAPES:
            logger.error(f"Shape kind '{kind}' is specified but not supported.")
            raise ImportError(f"Shape kind '{kind}' is specified but not supported.")
        module_path = f"point_interaction.shapes.{kind}"
        class_name = _class_name(kind)
        try:
            module = importlib.import_module(module_path)
            shape_class = getattr(module, class_name)
            self.register_shape(kind, shape_class)
        except ImportError as e:
            logger.error(f"Failed to import shape module {module_path}: {e}")
            raise
        except AttributeError as e:
            logger.error(
                f"Failed to find shape class {class_name} in module {module_path}: {e}"
            )
            raise


_default_manager = ShapePluginManager()


def create_shape(config: Dict[str, Any]) -> BaseShape:
    """Instantiate the shape plugin for a dumped domain descriptor."""
    kind = config["kind"]
    if kind not in _default_manager._shapes:
        _default_manager.load_shape(kind)
    return _default_manager.get_shape(kind, config)
