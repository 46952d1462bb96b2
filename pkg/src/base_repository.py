from abc import ABC, abstractmethod
from pathlib import Path
from typing import Generic, TypeVar

EntityT = TypeVar("EntityT")


class BaseRepository(ABC, Generic[EntityT]):
    """File-backed store of entities rooted at one directory."""

    def __init__(self, root: Path):
        self._root = Path(root)

    @property
    def root(self) -> Path:
        return self._root

    @abstractmethod
    def get(self, entity_id: int) -> EntityT:
        """Get an entity by id.

        Args:
            entity_id: Entity id.

        Returns:
            EntityT: Entity.
        """

    @abstractmethod
    def add(self, entity: EntityT) -> Path:
        """Add an entity.

        Args:
            entity: Entity data.

        Returns:
            Path: Where the entity was written.
        """

    @abstractmethod
    def find(self, **kwargs) -> list[EntityT]:
        """Find entities.

        Args:
            kwargs: Filters data.

        Returns:
            list[EntityT]: Matching entities.
        """
