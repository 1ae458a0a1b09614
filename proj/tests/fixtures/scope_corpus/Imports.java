package demo;

import java.util.List;
import java.util.Map;
import static java.util.Collections.emptyList;
import java.io.*;
import static org.junit.Assert.*;

class Imports {
    List<String> names = emptyList();
    Map<String, File> files;

    void check() {
        assertTrue(names.isEmpty());
        Reader r = null;
        helperMissing();
    }
}
