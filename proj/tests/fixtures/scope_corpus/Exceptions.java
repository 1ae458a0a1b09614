import java.io.IOException;
import java.io.InputStream;

class Exceptions {
    int read(InputStream in) {
        try (InputStream s = in) {
            return s.read();
        } catch (IOException e) {
            log(e);
            return -1;
        }
    }

    void log(Object o) {
        if (o instanceof IOException io) {
            log(io.getMessage());
        }
    }
}
